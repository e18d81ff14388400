"""Simulation of robust collaborative PAC learning with adversarial users."""
