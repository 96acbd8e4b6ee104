#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "pdlight/experiment.hpp"

namespace pdlight {

// One decision and what followed it, up to the intersection's next decision.
struct GreenInterval {
    double time = 0.0;
    std::uint32_t intersection = 0;
    std::uint32_t phase = 0;
    std::int32_t green = 0;
    std::int32_t ideal = 0;   // n_pass estimate at decision time
    std::int32_t actual = 0;  // crossings on the phase's movements until the next decision
    std::int32_t max_vehicle_phase = -1;  // unique busiest phase at decision time, -1 on ties
    bool complete = false;                // false when the telemetry ends before the next decision
};

struct PhaseSummary {
    std::uint32_t intersection = 0;
    std::uint32_t phase = 0;
    std::size_t chosen = 0;
    double mean_vehicles = 0.0;  // mean over all rows of the vehicles on the phase's two lanes
};

// Complete intervals grouped by green length.
struct DurationSummary {
    std::int32_t green = 0;
    std::size_t intervals = 0;
    double mean_ideal = 0.0;
    double mean_actual = 0.0;
};

struct CaseStudy {
    std::vector<GreenInterval> intervals;
    std::vector<PhaseSummary> phases;
    std::vector<DurationSummary> durations;  // ascending green
    std::size_t decisions_with_unique_max = 0;
    std::size_t max_phase_chosen = 0;
    std::optional<double> max_phase_frequency;
    std::size_t over_ideal = 0;  // complete intervals with actual > ideal
};

CaseStudy case_study(const Telemetry& rows);

// case_study.csv (intervals), phase_summary.csv, duration_summary.csv and case_study_summary.json.
void write_case_study(const CaseStudy& study, const std::filesystem::path& dir);
nlohmann::json summary_json(const CaseStudy& study);

}  // namespace pdlight
