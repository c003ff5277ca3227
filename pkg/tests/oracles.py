"""Reference values computed independently of the package and frozen.

Closed forms were evaluated with mpmath at 30 digits; the Bell-measurement
values come from a dense Fock simulation (two modes at dimension 40 plus the
electronic level) that shares no code with the symbolic engine.
"""

# <a|-a> = exp(-2 |a|^2) at a = 1
OVERLAP_PM_ALPHA1 = 0.135335283236612691894

# sum_{n >= 6} exp(-1)/n!  and  sqrt(1 - tail): truncated |a=1> at dim 6 vs the exact state
COHERENT_TAIL_DIM6 = 5.94184817581693e-4
COHERENT_OVERLAP_DIM6 = 0.999702863446143334593

# cat normalization [2(1 + exp(-2 a^2))]^(-1/2)
CAT_NORM_PLUS = {1.0: 0.663625300142287539376, 2.0: 0.706988207069090199084}

# purity of one mode of |phi+> at a = 1: [(1+s)^4 + (1-s)^4] / [4 (1+s^2)^2], s = exp(-2)
PHI_PLUS_MARGINAL_PURITY = 0.535325412426582232843

# (16/15)(1 - 1/2)
ENTROPY_HALF_MIXTURE_D16 = 0.533333333333333333333

# transfer input sqrt(2/5)(|0> - |1>) + sqrt(1/5)|2>: F(start) = |<0|psi>|^4
TRANSFER_F0 = 0.16

# int_{-200}^{200} G / (2 cosh(G t)) dt at G = 0.03
PULSE_AREA_WINDOW = 1.56583883259484630187

# disambiguation at a = 2: eps = pi / (8 sqrt 2), two-level amplitudes of |-eps>
DISAMBIG_EPS = 0.277680183634897890438
DISAMBIG_P1 = 0.0713843389163291650423  # eps^2 exp(-eps^2)
DISAMBIG_P0 = 0.925791451203618072959  # exp(-eps^2)

# rot_z at a = 2, theta = pi: |<a|a + i eps>| per branch with eps = pi/8
ROTZ_BRANCH_OVERLAP = 0.925791451203618072959

# ZZ phase 2 a^2 sin(theta/2) at a = 2
CNOT_CHI = {"pi/16": 0.784137122636484815954, "pi/36": 0.348955098922687998254}

# full Fock-engine discrimination at a = 2 (dims 40 x 40 + electronic)
BELL_PSI_PLUS_FALSE_E_A2 = 0.0714550944391491
BELL_EFFICIENCY_A2 = 0.928544809108108  # worst case, the phi+ input
