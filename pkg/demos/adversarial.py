"""
EXP3 and the implicitly normalized forecaster
=============================================
"""
import numpy as np

from banditlab import adv

n, K = 1000, 2
M = np.tile([0.6, 0.4], (n, 1))
arm_u, z_u = adv.draw_uniforms(seed=0, indices=range(500), n=n)

exp3 = adv.Forecaster.exp3(n, K)
print(f"EXP3 eta={exp3.eta:.4f} gamma={exp3.gamma:.4f}, bound {adv.exp3_regret_bound(n, K):.1f}")
for name, f in [("EXP3", exp3), ("INF", adv.inf_bandit_default(n, K))]:
    R = adv.regret_of(M, adv.play(f, M, arm_u, z_u))
    print(f"{name:5s} mean regret {R.mean():6.2f}")

# an exponential psi reproduces EXP3 exactly
psi = adv.PsiFunction("exponential", exp3.eta, K, exp3.gamma)
a = adv.play(exp3, M, arm_u[:5], record=True)
b = adv.play(adv.Forecaster.inf(psi), M, arm_u[:5], record=True)
print("max |p difference|:", np.abs(a.probs - b.probs).max())

# the normalization constant for a polynomial psi
x = np.array([3.0, 1.0, -2.0])
poly = adv.PsiFunction("polynomial", eta=2.0, K=3, q=2)
C = adv.normalization_constant(x, poly)
print("C =", C, " probabilities", poly(x - C).round(4))
