from pprint import pprint

from pyquermass import builtin, level_profile, verify_main_identity, verify_pointwise

# A warped product whose level sets are tilted, so both curvature corrections are active
scenario = builtin("warped_tilted", n=4)

# Compare both sides of the integral formula
print("Comparing M_1 between the boundary levels with the volume integral")
pprint(verify_main_identity(scenario, 1).model_dump())

# Check d Phi_2 against finite differences at a few points
print("Checking d Phi_2 pointwise")
pprint(verify_pointwise(scenario, 2, points=10, richardson=True).model_dump())

# Gauss-Bonnet along an ellipsoidal foliation
print("Total Gauss curvature of the level sets of an ellipsoid foliation")
for row in level_profile(builtin("ellipsoid_flat"), 2, [0.0, 0.5, 1.0]):
    print(row.t, row.value, row.closed_form)
