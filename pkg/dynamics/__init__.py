# Quantum propagator and classical covering map
