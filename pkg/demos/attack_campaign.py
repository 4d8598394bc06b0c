"""Run the bundled attack scripts against a small deployment, then the weakened negative control.

    python3 demos/attack_campaign.py
"""

import dataclasses
from pathlib import Path

from vfcauth.simnet import ScenarioConfig, build_world, checks, load_script

ROOT = Path(__file__).resolve().parent.parent
cfg = ScenarioConfig.load(ROOT / "configs" / "honest.yaml")


def run(config, script):
    world = build_world(config, load_script(script))
    world.run_until(8_000)
    touched = [e for e in world.trace if e.get("adversarial") and e["event"] not in ("send", "recv")]
    return checks.attack_run(world), touched


for script in sorted((ROOT / "configs" / "attacks").glob("*.yaml")):
    report, touched = run(cfg, script)
    verdicts = sorted({e["outcome"] + (f"/{e['reason']}" if "reason" in e else "") for e in touched})
    print(f"{script.stem:12s} safe={report.ok}  adversarial events={len(touched)}  outcomes={verdicts}")

weak = dataclasses.replace(cfg, window_ms=None, replay_cache=False)
report, _ = run(weak, ROOT / "configs" / "attacks" / "replay.yaml")
print(f"\nwithout freshness checks the replay script breaks safety: {not report.ok}")
for p in report.problems[:3]:
    print("  ", p)
