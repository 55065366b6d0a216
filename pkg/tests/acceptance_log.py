"""Pass/fail lines collected by the acceptance tests and echoed in the terminal summary."""

ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed
