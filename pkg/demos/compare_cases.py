"""Price one of the six cases with all three models and print the gaps.

Usage: python3 demos/compare_cases.py [case_id] [paths]

A run at 40 000 paths takes a few seconds per case; the acceptance suite uses
200 000.
"""
import sys

import numpy as np

from quanto import REFERENCE_MARKET, SimGrid, case_spec, run_case

case_id = int(sys.argv[1]) if len(sys.argv) > 1 else 2
paths = int(sys.argv[2]) if len(sys.argv) > 2 else 40_000

spec = case_spec(case_id)
res = run_case(spec, REFERENCE_MARKET, SimGrid.for_maturity(spec.maturity, paths, seed=7), expert_rows=50_000)

print(f"case {case_id}: {spec.copula_family} view, T={spec.maturity}, resolved parameter {res.resolved_param}")
print(f"ATM vols: asset {res.vol_sf_atm:.4f}, inverse FX {res.vol_q_atm:.4f}")
print(f"{'strike':>8} {'practitioner':>13} {'dsw':>10} {'copula':>10} {'z(p,d)':>7} {'z(c,d)':>7}")
zpd, zcd = res.z_gap("practitioner", "dsw"), res.z_gap("copula", "dsw")
for i, k in enumerate(res.strikes):
    print(f"{k:8.0f} {res.practitioner[i]:13.2f} {res.dsw[i]:10.2f} {res.copula[i]:10.2f} "
          f"{zpd[i]:7.2f} {zcd[i]:7.2f}")
print(f"worst gaps: practitioner/dsw {np.nanmax(zpd):.2f}, copula/dsw {np.nanmax(zcd):.2f} standard errors")
