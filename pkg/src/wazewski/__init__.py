"""Bounded solutions of x'' = f(t, x, x') via exit times and exit-side bisection.

Modules by concern: ``dynamics`` (adaptive integration with dense
output), ``geometry`` (sublevel domains and boundary-hypothesis checks),
``exits`` (first-exit times, retraction map, asymptotics), ``search``
(survivor bisection), ``models`` and ``profiles`` (Whitney pendulum, rotating
rod), ``scenario``/``commands``/``cli`` (the command-line front end).
"""

__version__ = "0.1.0"
