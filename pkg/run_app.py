#!/usr/bin/env python3
"""
Bures / SD geometry of Eggeling-Werner tripartite states

Examples:
    python run_app.py tensor --point '{"r_minus": 0.1, "r_plus": 0.2, "r": [0.3, 0, 0]}'
    python run_app.py estimate --case general --region ppt-oracle --subsamples 5 --points-per 1e8 --seed 7
    python run_app.py quadrature --target trisep-bound
    python run_app.py raster --rminus 0.1 --rplus 0.27 --res 512 --out section.pgm
"""

import sys

from src.cli.main import run

if __name__ == "__main__":
    sys.exit(run())
