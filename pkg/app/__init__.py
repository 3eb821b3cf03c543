# Fatou coordinates of parabolic Dulac germs
