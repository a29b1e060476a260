# A convergence table: scheme vs exact density, then the scheme against itself.
import sys

from tv_euler import load_config, run_experiment
from tv_euler.experiment import emit_outputs

path = sys.argv[1] if len(sys.argv) > 1 else "configs/smoke.toml"
cfg = load_config(path)
report = run_experiment(cfg, log=print)

print(f"\n{'h':>10} {'estimate':>9} {'precision':>10} {'ratio':>6} {'theory':>6}")
for r in report.rows:
    ratio = "" if r.ratio is None else f"{r.ratio:.2f}"
    theory = "" if r.theoretical_ratio is None else f"{r.theoretical_ratio:.2f}"
    print(f"T/{r.denominator:<8} {r.estimate:9.4f} {r.precision:10.2e} {ratio:>6} {theory:>6}")
if report.fit is not None:
    print(f"order {report.fit.slope:.3f}, r^2 {report.fit.r_squared:.4f}")

for p in emit_outputs(report, cfg, "/tmp/tv_euler_demo"):
    print("wrote", p)
