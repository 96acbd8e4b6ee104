#include "pdlight/casestudy.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <stdexcept>

namespace pdlight {

CaseStudy case_study(const Telemetry& rows) {
    CaseStudy out;
    if (rows.empty()) return out;
    static const auto phase_table = standard_phase_table();

    std::map<std::uint32_t, std::vector<const TelemetryRow*>> by_node;
    for (const auto& r : rows) by_node[r.intersection].push_back(&r);

    for (const auto& [node, series] : by_node) {
        std::array<double, kPhases> vehicle_sum{};
        std::array<std::size_t, kPhases> chosen{};
        for (std::size_t k = 0; k < series.size(); ++k) {
            const auto& r = *series[k];
            std::array<std::int32_t, kPhases> load{};
            for (std::size_t p = 0; p < kPhases; ++p) {
                for (std::size_t slot : phase_table[p].movements) load[p] += r.vehicles[slot];
                vehicle_sum[p] += load[p];
            }
            if (r.decision_phase < 0) continue;

            GreenInterval g;
            g.time = r.time;
            g.intersection = node;
            g.phase = static_cast<std::uint32_t>(r.decision_phase);
            g.green = r.decision_green;
            g.ideal = r.ideal_pass;
            ++chosen[g.phase];

            std::size_t best = 0;
            bool unique = true;
            for (std::size_t p = 1; p < kPhases; ++p) {
                if (load[p] > load[best]) {
                    best = p;
                    unique = true;
                } else if (load[p] == load[best]) {
                    unique = false;
                }
            }
            if (unique) {
                g.max_vehicle_phase = static_cast<std::int32_t>(best);
                ++out.decisions_with_unique_max;
                if (best == g.phase) ++out.max_phase_chosen;
            }

            std::size_t j = k + 1;
            for (; j < series.size(); ++j) {
                for (std::size_t slot : phase_table[g.phase].movements) g.actual += series[j]->discharged[slot];
                if (series[j]->decision_phase >= 0) break;
            }
            g.complete = j < series.size();
            if (g.complete && g.actual > g.ideal) ++out.over_ideal;
            out.intervals.push_back(g);
        }
        for (std::uint32_t p = 0; p < kPhases; ++p) {
            out.phases.push_back({node, p, chosen[p], vehicle_sum[p] / static_cast<double>(series.size())});
        }
    }
    std::map<std::int32_t, DurationSummary> by_green;
    for (const auto& g : out.intervals) {
        if (!g.complete) continue;
        auto& d = by_green[g.green];
        d.green = g.green;
        ++d.intervals;
        d.mean_ideal += g.ideal;
        d.mean_actual += g.actual;
    }
    for (auto& [green, d] : by_green) {
        d.mean_ideal /= static_cast<double>(d.intervals);
        d.mean_actual /= static_cast<double>(d.intervals);
        out.durations.push_back(d);
    }
    if (out.decisions_with_unique_max > 0) {
        out.max_phase_frequency =
            static_cast<double>(out.max_phase_chosen) / static_cast<double>(out.decisions_with_unique_max);
    }
    return out;
}

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

nlohmann::json summary_json(const CaseStudy& s) {
    nlohmann::json j{{"decisions", s.intervals.size()},
                     {"decisions_with_unique_max", s.decisions_with_unique_max},
                     {"max_phase_chosen", s.max_phase_chosen},
                     {"intervals_over_ideal", s.over_ideal}};
    j["max_phase_frequency"] = s.max_phase_frequency ? nlohmann::json(*s.max_phase_frequency) : nlohmann::json(nullptr);
    return j;
}

void write_case_study(const CaseStudy& study, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "case_study.csv");
        out << "time,intersection,phase,green,ideal_pass,actual_pass,max_vehicle_phase,complete\n";
        for (const auto& g : study.intervals) {
            out << num(g.time) << ',' << g.intersection << ',' << g.phase << ',' << g.green << ',' << g.ideal << ','
                << g.actual << ',' << g.max_vehicle_phase << ',' << (g.complete ? 1 : 0) << '\n';
        }
    }
    {
        auto out = open_out(dir / "phase_summary.csv");
        out << "intersection,phase,chosen,mean_vehicles\n";
        for (const auto& p : study.phases) {
            out << p.intersection << ',' << p.phase << ',' << p.chosen << ',' << num(p.mean_vehicles) << '\n';
        }
    }
    {
        auto out = open_out(dir / "duration_summary.csv");
        out << "green,intervals,mean_ideal_pass,mean_actual_pass\n";
        for (const auto& d : study.durations) {
            out << d.green << ',' << d.intervals << ',' << num(d.mean_ideal) << ',' << num(d.mean_actual) << '\n';
        }
    }
    auto out = open_out(dir / "case_study_summary.json");
    out << summary_json(study).dump(2) << '\n';
}

}  // namespace pdlight
