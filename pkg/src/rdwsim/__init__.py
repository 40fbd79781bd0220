"""rdwsim: deterministic 2D redirected-walking simulation with
future-position steering controllers and a Monte Carlo experiment harness."""

__version__ = "0.1.0"
