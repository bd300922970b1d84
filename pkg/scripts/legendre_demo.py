"""Gamma-hat for a few order parameters, and the inverse transform at a low temperature."""
from parisi.legendre import duality_inverse, gamma_hat
from parisi.minimize import MinimizedCurve, MinimizeOptions
from parisi.model import atom_at_one, replica_symmetric, sk, validate_order_parameter

if __name__ == "__main__":
    mix = sk()
    cases = {
        "alpha = 1": replica_symmetric(),
        "atom at 1": atom_at_one(),
        "two steps": validate_order_parameter(2, (0.2, 0.6), (0.3,)),
    }
    for name, op in cases.items():
        res = gamma_hat(mix, op)
        where = res.argmax_interval if res.flat else res.argmax_gamma
        print(f"{name:10s} Gamma = {res.value:.10g}  argmax {where}")

    curve = MinimizedCurve(mix, 2, MinimizeOptions())
    meas = curve(4.0)
    inv = duality_inverse(mix, meas.op, 4.0, curve=curve)
    print(f"minimizer at gamma = 4: q = {meas.op.q}, m = {meas.op.m}")
    print(f"sup_gamma P - gamma I / 2 = {inv.sup_value:.10g}, Gamma = {inv.gamma_hat.value:.10g}, "
          f"residual {inv.residual:.2e}")
