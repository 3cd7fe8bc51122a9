#include "smib/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "smib/rng.hpp"

namespace smib {

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::size_t total_samples(const std::vector<Trajectory>& grid) {
    std::size_t n = 0;
    for (const auto& traj : grid) n += traj.size();
    return n;
}

std::vector<Trajectory> generate_grid(const DatasetSpec& spec, const SwingParams& params) {
    if (!spec.valid()) throw std::invalid_argument("invalid dataset spec");
    std::vector<Trajectory> grid;
    grid.reserve(spec.n_trajectories);
    for (int i = 0; i < spec.n_trajectories; ++i) {
        const double frac = spec.n_trajectories == 1
                                ? 0.0
                                : static_cast<double>(i) / (spec.n_trajectories - 1);
        const double p1 = spec.p_min + frac * (spec.p_max - spec.p_min);
        try {
            grid.push_back(integrate(params, p1, spec.init, spec.t_end, spec.output_step));
        } catch (const IntegrationError& e) {
            throw DatasetError("integration failed at p1 = " + format_double(p1) + ": " +
                               e.what());
        }
    }
    return grid;
}

std::vector<TrainingPoint> sample_training_points(const std::vector<Trajectory>& grid,
                                                  std::size_t n_u, std::uint64_t seed) {
    const std::size_t total = total_samples(grid);
    if (n_u > total) {
        throw DatasetError("requested " + std::to_string(n_u) + " training points but grid has " +
                           std::to_string(total));
    }
    std::vector<std::size_t> indices(total);
    for (std::size_t i = 0; i < total; ++i) indices[i] = i;
    Rng rng(seed);
    rng.shuffle(indices);
    indices.resize(n_u);

    // Flat index -> (trajectory, sample) without materializing the flat grid.
    std::vector<std::size_t> offsets(grid.size() + 1, 0);
    for (std::size_t i = 0; i < grid.size(); ++i) offsets[i + 1] = offsets[i] + grid[i].size();

    std::vector<TrainingPoint> points;
    points.reserve(n_u);
    for (std::size_t flat : indices) {
        std::size_t traj_idx = 0;
        while (offsets[traj_idx + 1] <= flat) ++traj_idx;
        const auto& traj = grid[traj_idx];
        const std::size_t k = flat - offsets[traj_idx];
        points.push_back({traj.times[k], traj.p1, traj.states[k].delta});
    }
    return points;
}

std::vector<CollocationPoint> sample_collocation_points(std::size_t n_f, double t_end,
                                                        double p_min, double p_max,
                                                        std::uint64_t seed) {
    if (n_f < 1) throw std::invalid_argument("n_f must be at least 1");
    Rng rng(seed);
    std::vector<std::size_t> t_strata(n_f), p_strata(n_f);
    for (std::size_t i = 0; i < n_f; ++i) t_strata[i] = p_strata[i] = i;
    rng.shuffle(t_strata);
    rng.shuffle(p_strata);

    std::vector<CollocationPoint> points;
    points.reserve(n_f);
    const double nf = static_cast<double>(n_f);
    for (std::size_t i = 0; i < n_f; ++i) {
        const double ut = (static_cast<double>(t_strata[i]) + rng.uniform01()) / nf;
        const double up = (static_cast<double>(p_strata[i]) + rng.uniform01()) / nf;
        points.push_back({ut * t_end, p_min + up * (p_max - p_min)});
    }
    return points;
}

namespace {

double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw DatasetError("malformed numeric field '" + field + "' in " + context);
    }
    return value;
}

}  // namespace

void save_csv(const std::vector<Trajectory>& trajectories, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot open " + path + " for writing");
    out << "p1,t,delta,omega\n";
    for (const auto& traj : trajectories) {
        for (std::size_t k = 0; k < traj.size(); ++k) {
            out << format_double(traj.p1) << ',' << format_double(traj.times[k]) << ','
                << format_double(traj.states[k].delta) << ','
                << format_double(traj.states[k].omega) << '\n';
        }
    }
    if (!out) throw DatasetError("write failure on " + path);
}

std::vector<Trajectory> load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "p1,t,delta,omega") {
        throw DatasetError("malformed file " + path + ": expected header p1,t,delta,omega");
    }

    std::vector<Trajectory> trajectories;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4) {
            throw DatasetError("inconsistent column count at line " + std::to_string(line_no) +
                               " of " + path);
        }
        const std::string ctx = path + ":" + std::to_string(line_no);
        const double p1 = parse_double(fields[0], ctx);
        const double t = parse_double(fields[1], ctx);
        const State state{parse_double(fields[2], ctx), parse_double(fields[3], ctx)};

        const bool new_traj = trajectories.empty() || trajectories.back().p1 != p1 ||
                              (!trajectories.back().times.empty() &&
                               t <= trajectories.back().times.back());
        if (new_traj) {
            trajectories.push_back({p1, {}, {}});
        }
        trajectories.back().times.push_back(t);
        trajectories.back().states.push_back(state);
    }
    if (trajectories.empty()) throw DatasetError("malformed file " + path + ": no data rows");
    return trajectories;
}

}  // namespace smib
