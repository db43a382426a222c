"""
Sweeping the flow exponent up to the threshold p0
=================================================

For the Gauss function with n = 2, p0 = 2. The same runner behind the
command line writes one directory per exponent and a merged rates table.
"""

import csv
import tempfile
from pathlib import Path

from hyperflow.cli import parse_config, run_experiment

with tempfile.TemporaryDirectory() as tmp:
    cfg = parse_config(f"""
        n = 2
        p = 1.5
        p_values = [1.2, 1.5, 1.8, 2.0]
        N = 128
        T_end = 12
        dt_out = 0.5
        fit_window = [6, 12]
        out_dir = {tmp}
    """)
    print("exit code:", run_experiment(cfg, sweep=True))
    with open(Path(tmp) / "rates.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            print(f"p = {float(row['p']):.1f}  status = {row['status']:<4} "
                  f"lambda(v-1) = {float(row['lambda_v_max_minus_1']):.4f}  "
                  f"2/n^p = {float(row['target_rate']):.4f}")
