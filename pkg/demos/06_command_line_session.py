"""
A complete command-line session
===============================

Everything the library does is reachable from the `abshr` executable. This
script replays a realistic session in a scratch directory: generate two
recordings, process one, evaluate both against their ground truth, and run
the built-in sanity checks.
"""

import json
import tempfile
from pathlib import Path

from abshr.cli import main

root = Path(tempfile.mkdtemp(prefix="abshr_demo_"))
print(f"working in {root}\n")


def run(argv):
    print(f"$ abshr {' '.join(argv)}")
    code = main(argv)
    assert code == 0, f"exit code {code}"


# 1. two synthetic recordings with ground-truth beat files
for name, profile, seed in (("steady", "75", 1), ("drift", "[[0,64],[300,82]]", 2)):
    spec = root / f"{name}.json"
    spec.write_text(
        '{"duration_s": 300.0, "hr_profile": %s,'
        ' "gi_noise_snr_db": 3.0, "motion_spike_rate_per_min": 1.0,'
        ' "rng_seed": %d}' % (profile, seed)
    )
    run(["synth", str(spec), "--out", str(root / name)])
    print(f"  -> {sorted(p.name for p in (root / name).iterdir())}")

# 2. process one recording on its own
run(["process", str(root / "steady" / "audio.wav"), "--out", str(root / "hr")])
missing = json.loads((root / "hr" / "missingness.json").read_text())
print(f"  -> missingness: {missing}")
ihr_lines = (root / "hr" / "ihr.csv").read_text().splitlines()
print(f"  -> ihr.csv: {len(ihr_lines) - 1} samples, first: {ihr_lines[1]}")

# 3. evaluate both against their generating beat grids
manifest = root / "manifest.csv"
manifest.write_text(
    "audio_file,rpeak_file,participant,day\n"
    "steady/audio.wav,steady/true_beats.csv,p01,mon\n"
    "drift/audio.wav,drift/true_beats.csv,p02,mon\n"
)
run(["evaluate", str(manifest), "--out", str(root / "scores")])
overall = json.loads((root / "scores" / "overall_ihr.json").read_text())
print(f"  -> beat-to-beat: n = {overall['n_pairs']}, "
      f"MAE {overall['mae_bpm']} BPM, MAPE {overall['mape_pct']}%")
overall_a = json.loads((root / "scores" / "overall_ahr.json").read_text())
print(f"  -> window averages: n = {overall_a['n_pairs']}, "
      f"MAE {overall_a['mae_bpm']} BPM")
by_part = json.loads((root / "scores" / "by_participant_ihr.json").read_text())
for who, rep in by_part.items():
    print(f"  -> {who}: MAE {rep['mae_bpm']} BPM over {rep['n_pairs']} beats")

# 4. the embedded invariant checks double as an install smoke test
run(["selftest"])
