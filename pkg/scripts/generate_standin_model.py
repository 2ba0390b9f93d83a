#!/usr/bin/env python3
"""Regenerate the committed stand-in plant model JSON.

The file src/pogd_ilc/data/standin_model.json is the deterministic output of
synth_standin_model(seed=0); rerunning this script must be a no-op unless the
synthesis recipe itself changed.
"""

import pathlib

from pogd_ilc.model import save_state_space, synth_standin_model

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "pogd_ilc" / "data" / "standin_model.json"

if __name__ == "__main__":
    save_state_space(synth_standin_model(seed=0), OUT)
    print(f"wrote {OUT}")
