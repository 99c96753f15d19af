#pragma once

#include "prl/monte_carlo.hpp"
#include "prl/returns_data.hpp"
#include "prl/rng.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testing_support {

inline std::string fixture(const std::string& name) {
    return std::string(PRL_FIXTURE_DIR) + "/" + name;
}

/// Fresh scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("prl_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    return path.string();
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Calibrated simulated market returned as a labelled panel plus its model.
struct SimulatedMarket {
    prl::ModelInstance model;
    prl::SimulatedPanel panel;
};

inline SimulatedMarket simulate_market(Eigen::Index N, Eigen::Index T, std::uint64_t seed) {
    const prl::CalibrationParams params = prl::default_calibration();
    prl::Rng rng = prl::make_rng(seed);
    SimulatedMarket m{prl::generate_model(params, N, rng), {}};
    m.panel = prl::simulate_panel(params, m.model, T, rng);
    return m;
}

}  // namespace testing_support
