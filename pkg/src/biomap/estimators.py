"""Estimator-style wrappers so the planners compose with sklearn tooling.

``fit`` takes an environment (BIOMAP) or a ground-truth model (QMDP);
``predict`` maps action vectors / beliefs to action ids; ``score`` returns
the cumulative reward of one evaluation episode.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .analysis import QMDPAgent, evaluate_policy, value_iteration
from .core import TabularMDP
from .planner import ArbiterParams, BiomapBudget, ExplorationLog, execute_policy, run_biomap
from .validation import check_action_vectors, check_beliefs, check_env


class BiomapPlanner(BaseEstimator):
    """Model-free planner: explores by dead reckoning and extracts a shortest-path policy.

    Parameters
    ----------
    max_episodes : int, default=60
        Episode budget for exploration.
    max_steps : int, default=50
        Per-episode step budget; boundary probes are charged against it.
    delta : int, default=3
        Boundary tolerance (number of repeated probes, >= 2).

    Attributes
    ----------
    graph_, automaton_, verdict_, policy_, mdp_, metrics_
        Products of the last ``fit``.
    exploration_ : ExplorationLog
        Per-episode trajectories recorded while exploring.
    """

    def __init__(self, max_episodes=60, max_steps=50, delta=3):
        self.max_episodes = max_episodes
        self.max_steps = max_steps
        self.delta = delta

    def fit(self, env, y=None):
        check_env(env)
        self.exploration_ = ExplorationLog()
        res = run_biomap(env, BiomapBudget(self.max_episodes, self.max_steps),
                         ArbiterParams(self.delta), self.exploration_)
        self.graph_ = res.graph
        self.automaton_ = res.automaton
        self.verdict_ = res.verdict
        self.policy_ = res.policy
        self.mdp_ = res.mdp
        self.metrics_ = res.metrics
        self.n_actions_ = env.action_count
        self.dim_ = len(res.graph.origin)
        return self

    def predict(self, X):
        """Policy action for each action vector; -1 off the optimal path."""
        check_is_fitted(self, "policy_")
        X = check_action_vectors(X, self.dim_)
        return np.array([self.policy_.action_at.get(tuple(int(c) for c in row), -1) for row in X],
                        dtype=np.int64)

    def score(self, env, y=None):
        check_is_fitted(self, "policy_")
        return execute_policy(env, self.policy_).total_reward


class QMDPPlanner(BaseEstimator):
    """Model-based baseline: Q* of the underlying MDP, acted on through a belief."""

    def __init__(self, gamma=1.0, tol=1e-9, max_iter=10_000):
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, model: TabularMDP, observe=None):
        if not isinstance(model, TabularMDP):
            raise TypeError("QMDPPlanner.fit expects a TabularMDP")
        self.q_table_ = value_iteration(model, self.gamma, self.tol, self.max_iter)
        self.model_ = model
        self.observe_ = observe if observe is not None else (lambda s: s)
        self.states_ = list(model.states)
        index = {s: i for i, s in enumerate(self.states_)}
        q = np.zeros((len(self.states_), len(model.actions)))
        avail = np.zeros_like(q, dtype=bool)
        for (s, a), v in self.q_table_.q.items():
            q[index[s], model.actions.index(a)] = v
            avail[index[s], model.actions.index(a)] = True
        self.q_matrix_ = q
        self.available_ = avail
        return self

    def predict(self, B):
        """Greedy action for each belief row (ties go to the smaller action id)."""
        check_is_fitted(self, "q_matrix_")
        B = check_beliefs(B, len(self.states_))
        scores = B @ self.q_matrix_
        reachable = (B > 0) @ self.available_
        scores = np.where(reachable, scores, -np.inf)
        return np.asarray(self.model_.actions)[np.argmax(scores, axis=1)]

    def agent(self) -> QMDPAgent:
        check_is_fitted(self, "q_table_")
        return QMDPAgent(self.model_, self.observe_, self.q_table_)

    def score(self, env, y=None, step_cap=50):
        return evaluate_policy(env, self.agent(), 1, step_cap).rewards[0]
