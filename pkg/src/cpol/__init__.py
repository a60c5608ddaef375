"""Compton polarimetry of photon pairs."""
