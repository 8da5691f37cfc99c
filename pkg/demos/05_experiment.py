"""A small method matrix and a budget sweep, written to ./runs/demo.

Run: python3 demos/05_experiment.py
"""

from shapval import ExperimentConfig, MethodSpec, ScenarioConfig, pareto_sweep, run_experiment
from shapval.harness import pareto_csv

config = ExperimentConfig(
    methods=[
        MethodSpec("ipss", {"gamma": 8}),
        MethodSpec("tmc", {"rounds": 2}),
        MethodSpec("ccshapley", {"gamma": 8}),
        MethodSpec("sample", {"gamma": 8, "scheme": "MC"}),
    ],
    scenario=ScenarioConfig(scenario="diff_size_same_dist", n=6, t=80),
    repeats=20,
    seed=7,
    out="runs/demo",
)
report = run_experiment(config)
print(report.aggregates_csv())

sweep = pareto_sweep(
    ExperimentConfig(methods=[MethodSpec("ipss"), MethodSpec("ccshapley"), MethodSpec("tmc")],
                     scenario=config.scenario, repeats=10),
    [8, 16, 32, 64],
)
print(pareto_csv(sweep))
