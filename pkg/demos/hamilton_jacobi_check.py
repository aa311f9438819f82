"""Hamilton-Jacobi verification for the harmonic oscillator.

A section of the dual bundle solves the Hamilton-Jacobi equation exactly
when every base integral curve it generates lifts to a trajectory of the
full implicit dynamics.  The checker evaluates both sides independently
and reports whether they agree, so a deliberately wrong section must fail
both tests at once.
"""

from algmech import BasePoint, HJSection, get_model, verify_theorem

bundle = get_model("harmonic-oscillator")
system = bundle.system

good = bundle.hj_sections["default"]
report = verify_theorem(system, good, BasePoint([0.0]), 5e-3, 1.0, 1e-8)
print("section p(x) = sqrt(2 - x^2)  (energy level E = 1)")
print(f"  solves the field equation: {report.hj_pass}"
      f"  (residual {report.max_hj_residual:.2e})")
print(f"  base curves lift to dynamics: {report.lift_pass}"
      f"  (residual {report.max_lift_residual:.2e})")

bad = HJSection(1, 1, ["sqrt(2 - x1^2) + 0.1"], ["sqrt(2 - x1^2) + 0.1"])
report = verify_theorem(system, bad, BasePoint([0.0]), 5e-3, 1.0, 1e-8)
print("\nsame section shifted by 0.1")
print(f"  solves the field equation: {report.hj_pass}"
      f"  (residual {report.max_hj_residual:.2e})")
print(f"  base curves lift to dynamics: {report.lift_pass}"
      f"  (residual {report.max_lift_residual:.2e})")
print(f"  verdicts consistent: {report.consistent}")
