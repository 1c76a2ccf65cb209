"""Adiabatic flame temperatures from NASA 7-coefficient thermodynamic data."""
