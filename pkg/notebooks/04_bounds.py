# Information per test and the resulting test-count bounds.
import numpy as np

from gtlab import NoiseModel
from gtlab.bounds import (MISpec, bounds_report, fano_floor, mutual_information,
                          mutual_information_bruteforce, t_lower, t_upper)

# closed form vs enumerating all 2^K inclusion patterns
spec = MISpec(NoiseModel.parse("dilution:u=0.5"), k=3, ell=1, p=0.25)
print(mutual_information(spec), mutual_information_bruteforce(spec))

# one defective, no noise: binary search needs log2 N tests, and so does the bound
print("N=1024:", t_lower(NoiseModel.noise_free(), 1024, 1))

for text in ("noise-free", "addition:q=0.1", "dilution:u=0.5", "add-dilute:q=0.1,u=0.3"):
    m = NoiseModel.parse(text)
    lo, p_lo, _ = t_lower(m, 100, 2)
    hi, p_hi, _ = t_upper(m, 100, 2)
    print(f"{text:24s} lower {lo:7.2f} (p={p_lo})  upper {hi:7.2f} (p={p_hi})")

# error floor that no strategy can beat, as a function of the budget
m = NoiseModel.parse("dilution:u=0.5")
print([round(fano_floor(m, 50, 2, t), 3) for t in range(0, 40, 5)])

report = bounds_report(m, 50, 2).to_dict()
print({key: report[key] for key in ("t_lower", "t_upper", "p_star_lower", "log_base")})
