"""scikit-learn style wrappers around the functional API.

Rows of ``X`` are periapsis parameters ``(r, theta, e)``. Nothing is
learned: ``fit`` only validates input and records the class labels.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dynamics import kepler_energy, to_p1_frame
from .errors import DomainError
from .integrate import IntegratorConfig
from .wsb import classify_many, periapsis_states


def check_periapsis_array(X) -> np.ndarray:
    """Validate an (m, 3) array of ``(r, theta, e)`` rows."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 3:
        raise DomainError(f"expected 3 columns (r, theta, e), got {X.shape[1]}")
    if np.any(X[:, 0] <= 0):
        raise DomainError("r must be positive")
    if np.any((X[:, 2] < 0) | (X[:, 2] >= 1)):
        raise DomainError("e must lie in [0, 1)")
    return X


def _check_mu(mu):
    if not (0.0 < mu < 0.5):
        raise DomainError("mu must lie in (0, 0.5)")


class PeriapsisTransformer(TransformerMixin, BaseEstimator):
    """Map ``(r, theta, e)`` rows to rotating-frame states.

    Parameters
    ----------
    mu : float
        Mass ratio of the smaller primary.
    frame : {"p2", "p1"}
        Origin of the output states.
    """

    def __init__(self, mu=0.01215, frame="p2"):
        self.mu = mu
        self.frame = frame

    def fit(self, X, y=None):
        _check_mu(self.mu)
        if self.frame not in ("p1", "p2"):
            raise DomainError("frame must be 'p1' or 'p2'")
        X = check_periapsis_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_periapsis_array(X)
        st = periapsis_states(X[:, 0], X[:, 1], X[:, 2], self.mu)
        return to_p1_frame(st) if self.frame == "p1" else st

    def kepler_energy(self, X):
        """Two-body energy about P2 of the transformed states."""
        st = periapsis_states(*check_periapsis_array(X).T, self.mu)
        return kepler_energy(st, self.mu)


class WStabilityClassifier(ClassifierMixin, BaseEstimator):
    """n-stable (1) versus n-unstable (0) label for each periapsis row.

    Parameters
    ----------
    mu : float
    n_cycles : int
        Number of cycles about P2 required for stability.
    rel_tol, abs_tol : float
        Integrator tolerances.
    t_max : float
        Time cap after which a missing return counts as non-return.
    threads : int
    """

    def __init__(self, mu=0.01215, n_cycles=1, rel_tol=1e-12, abs_tol=1e-12,
                 t_max=200 * 2 * np.pi, threads=1):
        self.mu = mu
        self.n_cycles = n_cycles
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.t_max = t_max
        self.threads = threads

    def _config(self):
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol, t_max=self.t_max)

    def fit(self, X, y=None):
        _check_mu(self.mu)
        if int(self.n_cycles) < 1:
            raise DomainError("n_cycles must be >= 1")
        self._config()
        X = check_periapsis_array(X)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def predict_outcomes(self, X):
        check_is_fitted(self, "classes_")
        X = check_periapsis_array(X)
        return classify_many(X[:, 0], X[:, 1], X[:, 2], self.mu, int(self.n_cycles),
                             self._config(), threads=int(self.threads))

    def predict(self, X):
        return np.array([int(o.stable) for o in self.predict_outcomes(X)])
