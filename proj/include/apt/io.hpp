#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "apt/diagnostics.hpp"
#include "apt/engine.hpp"
#include "apt/free_energy.hpp"

namespace apt {

/// 17 significant digits, enough for an exact round trip.
std::string format_real(double v);

/// Columns: iteration, chain, x0, x1, ...
void write_samples_csv(const std::filesystem::path& file, const SampleStore& samples);

/// Columns: iteration, pair, W_fwd, W_bwd, alpha, accepted, nonfinite.
void write_swaps_csv(const std::filesystem::path& file, const std::vector<SwapRecord>& records);
std::vector<SwapRecord> read_swaps_csv(const std::filesystem::path& file);

nlohmann::json to_json(const RunDiagnostics& d);
nlohmann::json to_json(const FreeEnergyEstimate& e);
nlohmann::json round_trips_json(const RunResult& r);
nlohmann::json explorer_json(const ExplorerStats& s);

void write_json(const std::filesystem::path& file, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace apt
