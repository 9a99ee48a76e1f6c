"""Physical constants and unit scale factors (everything internal is SI)."""

EPS0 = 8.8541878128e-12  # F/m
Q_E = 1.602176634e-19  # C
K_B = 1.380649e-23  # J/K

NM = 1e-9
MV_PER_CM = 1e8  # V/m
UC_PER_CM2 = 1e-2  # C/m^2
US = 1e-6
NS = 1e-9


def thermal_voltage(temperature=300.0):
    return K_B * temperature / Q_E
