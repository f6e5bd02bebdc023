#!/usr/bin/env python3
"""Run each bundled emergency-care scenario with its scripted solution and with
a random agent, and print success rates side by side.

Usage:
    python3 scripts/run_resus_demo.py [--episodes N] [--seed S]
"""

import argparse

from medgym import bundled_scenarios
from medgym.protocol import ResusAdapter
from medgym.rollout import RandomAgent, ScriptedAgent, run_rollout


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    for scenario in bundled_scenarios():
        scripted = run_rollout(
            ResusAdapter(scenario),
            ScriptedAgent([int(a) for a in scenario.solution]),
            episodes=min(args.episodes, 10),
        )
        random = run_rollout(
            ResusAdapter(scenario), RandomAgent(seed=args.seed), episodes=args.episodes
        )
        print(
            f"{scenario.name:>12} | scripted success={scripted.success_rate:.3f} "
            f"({len(scenario.solution)} actions) | "
            f"random success={random.success_rate:.3f} over {random.episodes} episodes"
        )


if __name__ == "__main__":
    main()
