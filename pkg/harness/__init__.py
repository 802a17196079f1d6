# Invariance scans, reports and acceptance checks
