"""Corridor simulator for infrastructure-enabled autonomy.

Roadside sensor packs (MSSPs) build situational awareness, in-vehicle
SmartConnects make tactical driving decisions over a drive-by-wire API,
and an exact Bayesian blame engine quantifies how responsibility for
failures distributes across the DBW, situational-awareness and
decision-making components.
"""

__version__ = "0.1.0"
