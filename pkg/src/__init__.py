# Shallow-water additional-argument solver
