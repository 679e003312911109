# Bures/SD geometry of Eggeling-Werner tripartite states
__version__ = "1.0.0"
