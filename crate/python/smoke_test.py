"""Smoke test for the terrasim Python extension.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import json
import math

import terrasim


def main():
    tuned = terrasim.SoilParameters.tuned()
    assert abs(math.degrees(tuned.friction_angle) - 23.0) < 1e-9
    assert tuned.to_dict()["unit_weight"] == 15620.0

    z, loads = terrasim.solve_equilibrium(tuned, 0.25, 9.81)
    assert abs(loads["normal_force"] - 9.81) < 1e-4, loads
    assert terrasim.loads_at(tuned, z, 0.25)["normal_force"] > 0.0

    try:
        terrasim.solve_equilibrium(tuned, 0.25, 60.0)
    except terrasim.SimulationError as e:
        print("60 N on the tuned soil:", e)
    else:
        raise AssertionError("expected the wheel to be buried")

    configs = [terrasim.RigConfig(tuned, s, load=9.81, label=label) for label, s in [("C1", 0.0), ("C3", 0.5)]]
    outcomes = terrasim.sweep(configs)
    for o in outcomes:
        print(o, "samples:", len(o))
    assert outcomes[1].steady["drawbar_pull"][0] > outcomes[0].steady["drawbar_pull"][0]
    assert outcomes[0].timeseries_csv().startswith("t_s,sinkage_m,")
    assert json.loads(outcomes[0].summary_json())["experiments"][0]["label"] == "C1"

    again = terrasim.RigConfig.from_toml(configs[0].to_toml())[0]
    assert again.slip == configs[0].slip and again.load == configs[0].load

    passed, text = terrasim.compare_reference(outcomes)
    assert not passed and "missing experiment: C2" in text

    report = json.loads(
        terrasim.calibrate(
            'soil = "table1"\nload = 9.81\ntimestep = 0.004\n'
            '[calibration]\nfree = ["phi"]\nbudget = 10\nexperiments = ["C2"]\n'
        )
    )
    assert report["evaluations"] <= 10
    assert "C2 - 0.25" in terrasim.reference_tables()
    print("smoke test passed")


if __name__ == "__main__":
    main()
