# Tests for the Fatou coordinate engine
