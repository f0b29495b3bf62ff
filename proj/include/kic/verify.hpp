#pragma once

#include <string>
#include <vector>

namespace kic {

/// One measured quantity against its threshold. Upper bounds pass when
/// measured <= threshold, lower bounds when measured >= threshold.
struct Measurement {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool lower_bound = false;

    bool passed() const { return lower_bound ? measured >= threshold : measured <= threshold; }
};

/// Result of one reproduction criterion. `measured`/`tolerance` echo the
/// binding measurement (the one closest to, or furthest past, its threshold).
struct CheckResult {
    std::string item;
    std::string title;
    std::vector<Measurement> measurements;

    bool passed() const;
    const Measurement& binding() const;
};

/// Runs the reproduction suite. tolerance_scale tightens (< 1) or loosens
/// (> 1) every threshold: upper bounds are multiplied by it, lower bounds
/// divided by it.
std::vector<CheckResult> run_verification(double tolerance_scale = 1.0);

/// `[{item, status, measured, tolerance}, ...]`
std::string verification_report_json(const std::vector<CheckResult>& results);

/// One "PASS|FAIL <item> <title> measured=... tolerance=..." line per result.
std::string verification_report_text(const std::vector<CheckResult>& results);

}  // namespace kic
