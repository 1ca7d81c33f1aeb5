"""Shared pytest configuration.

Numerical property tests can be slow on small CI boxes, so the hypothesis
deadline is disabled globally; example counts are chosen per test instead.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "numerics",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numerics")
