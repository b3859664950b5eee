"""k-Hessian operators, condenser capacities and numerical checks of Hessian
Sobolev, isocapacitary, capacitary and trace inequalities."""

__version__ = "0.1.0"
