"""Error and DOF columns as printed in the paper's tables, with their printed rates."""

# L-shape, k = 1, alpha = 0.75; singularity at (0,0), (0.5,0), (0,1)
LSHAPE1_DOFS = (81, 289, 1089, 4225, 16641, 66049, 263169, 1050625, 4198401)
LSHAPE1_COLUMNS = (
    (
        (6.1585e-03, 2.6986e-03, 1.1123e-03, 4.4037e-04, 1.7107e-04, 6.5689e-05, 2.5030e-05, 9.4877e-06, 3.5834e-06),
        (1.19, 1.28, 1.34, 1.36, 1.38, 1.39, 1.40, 1.40),
    ),
    (
        (6.8141e-03, 2.5648e-03, 8.8428e-04, 2.9202e-04, 9.4164e-05, 2.9909e-05, 9.4012e-06, 2.9328e-06, 9.0968e-07),
        (1.41, 1.54, 1.60, 1.63, 1.65, 1.67, 1.68, 1.69),
    ),
    (
        (6.2506e-03, 2.1211e-03, 6.7413e-04, 2.0903e-04, 6.4027e-05, 1.9471e-05, 5.8930e-06, 1.7774e-06, 5.3475e-07),
        (1.56, 1.65, 1.69, 1.71, 1.72, 1.72, 1.73, 1.73),
    ),
)

# Fichera corner, Q1, smooth solution
FICHERA_DOFS = (316, 3032, 26416, 220256, 1798336, 14532992)
FICHERA_ERRORS = (0.075444, 0.017182, 0.0039376, 0.00094597, 0.00023208, 5.7491e-05)
FICHERA_RATES = (1.96, 2.04, 2.02, 2.01, 2.00)
