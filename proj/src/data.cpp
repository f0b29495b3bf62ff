#include "kic/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "kic/errors.hpp"

namespace kic {

Trajectory::Trajectory(Matrix states, std::optional<Matrix> inputs, double dt, std::string id,
                       double t0)
    : states_(std::move(states)), inputs_(std::move(inputs)), dt_(dt), id_(std::move(id)), t0_(t0) {
    if (states_.rows() == 0 || states_.cols() == 0)
        throw DimensionError("trajectory needs at least one state row and one sample");
    if (inputs_ && inputs_->cols() != states_.cols())
        throw DimensionError("trajectory inputs have " + std::to_string(inputs_->cols()) +
                             " samples but states have " + std::to_string(states_.cols()));
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ParameterError("trajectory dt must be positive");
}

SnapshotSet::SnapshotSet(Matrix y, Matrix z, std::optional<Matrix> upsilon, std::optional<Matrix> xi)
    : y_(std::move(y)), z_(std::move(z)), upsilon_(std::move(upsilon)), xi_(std::move(xi)) {
    if (y_.rows() != z_.rows() || y_.cols() != z_.cols())
        throw DimensionError("Y and Z must share shape");
    if (upsilon_ && upsilon_->cols() != y_.cols())
        throw DimensionError("Upsilon column count differs from Y");
    if (xi_) {
        if (!upsilon_) throw DimensionError("Xi given without Upsilon");
        if (xi_->rows() != upsilon_->rows() || xi_->cols() != upsilon_->cols())
            throw DimensionError("Xi and Upsilon must share shape");
    }
}

Matrix SnapshotSet::omega() const {
    Matrix out(n_y() + n_gamma(), m());
    out.topRows(n_y()) = y_;
    if (upsilon_) out.bottomRows(n_gamma()) = *upsilon_;
    return out;
}

Matrix SnapshotSet::delta() const {
    const Eigen::Index extra = xi_ ? xi_->rows() : 0;
    Matrix out(n_y() + extra, m());
    out.topRows(n_y()) = z_;
    if (xi_) out.bottomRows(extra) = *xi_;
    return out;
}

namespace {

Eigen::Index total_pairs(std::span<const Trajectory> trajs) {
    if (trajs.empty()) throw InsufficientDataError("no trajectories given");
    Eigen::Index total = 0;
    for (const auto& t : trajs) {
        if (t.samples() < 2)
            throw InsufficientDataError("trajectory '" + t.id() + "' has fewer than 2 samples");
        if (t.state_dim() != trajs.front().state_dim())
            throw DimensionError("trajectories disagree on state dimension");
        total += t.samples() - 1;
    }
    return total;
}

}  // namespace

SnapshotSet build_pair(const Trajectory& traj) {
    return build_pair(std::span<const Trajectory>(&traj, 1));
}

SnapshotSet build_pair(std::span<const Trajectory> trajs) {
    const Eigen::Index m = total_pairs(trajs);
    const Eigen::Index n = trajs.front().state_dim();
    Matrix y(n, m), z(n, m);
    Eigen::Index col = 0;
    for (const auto& t : trajs) {
        const Eigen::Index k = t.samples() - 1;
        y.middleCols(col, k) = t.states().leftCols(k);
        z.middleCols(col, k) = t.states().rightCols(k);
        col += k;
    }
    return SnapshotSet(std::move(y), std::move(z));
}

SnapshotSet build_trio(const Trajectory& traj, bool include_future_input) {
    return build_trio(std::span<const Trajectory>(&traj, 1), include_future_input);
}

SnapshotSet build_trio(std::span<const Trajectory> trajs, bool include_future_input) {
    const Eigen::Index m = total_pairs(trajs);
    for (const auto& t : trajs) {
        if (!t.has_inputs()) throw MissingInputError("trajectory '" + t.id() + "' has no inputs");
        if (t.input_dim() != trajs.front().input_dim())
            throw DimensionError("trajectories disagree on input dimension");
    }
    const Eigen::Index n = trajs.front().state_dim();
    const Eigen::Index n_u = trajs.front().input_dim();

    Matrix y(n, m), z(n, m), upsilon(n_u, m), xi(n_u, m);
    Eigen::Index col = 0;
    for (const auto& t : trajs) {
        const Eigen::Index k = t.samples() - 1;
        y.middleCols(col, k) = t.states().leftCols(k);
        z.middleCols(col, k) = t.states().rightCols(k);
        upsilon.middleCols(col, k) = t.inputs()->leftCols(k);
        xi.middleCols(col, k) = t.inputs()->rightCols(k);
        col += k;
    }
    if (!include_future_input) return SnapshotSet(std::move(y), std::move(z), std::move(upsilon));
    return SnapshotSet(std::move(y), std::move(z), std::move(upsilon), std::move(xi));
}

SnapshotSet build_derivative_pair(const Trajectory& traj, const Matrix& derivs) {
    if (derivs.rows() != traj.states().rows() || derivs.cols() != traj.states().cols())
        throw DimensionError("derivative matrix shape differs from the state matrix");
    return SnapshotSet(traj.states(), derivs, traj.inputs());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, std::size_t line) {
    const std::string cell = trim(raw);
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    // from_chars rejects a leading '+', which strtod-style writers may emit.
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
        throw ParseError("non-numeric cell '" + cell + "'", line);
    return value;
}

// Returns (n_x, n_u) after checking the header is t,x1..xN[,u1..uM].
std::pair<int, int> parse_header(const std::vector<std::string>& cells) {
    if (cells.empty() || trim(cells[0]) != "t") throw ParseError("header must start with 't'", 1);
    int n_x = 0, n_u = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const std::string name = trim(cells[i]);
        if (n_u == 0 && name == "x" + std::to_string(n_x + 1)) {
            ++n_x;
        } else if (name == "u" + std::to_string(n_u + 1)) {
            ++n_u;
        } else {
            throw ParseError("unexpected header column '" + name + "'", 1);
        }
    }
    if (n_x == 0) throw ParseError("header has no state columns", 1);
    return {n_x, n_u};
}

}  // namespace

Trajectory read_csv(std::istream& in, const std::string& id) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line()) throw ParseError("empty file", 1);
    const auto [n_x, n_u] = parse_header(split_cells(line));
    const std::size_t width = 1 + static_cast<std::size_t>(n_x + n_u);

    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    while (next_line()) {
        if (line.empty()) continue;
        const auto cells = split_cells(line);
        if (cells.size() != width)
            throw ParseError("expected " + std::to_string(width) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c) row[c] = parse_number(cells[c], line_no);
        times.push_back(row[0]);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows", line_no);

    const auto samples = static_cast<Eigen::Index>(rows.size());
    double dt = 1.0;
    if (samples > 1) {
        dt = times[1] - times[0];
        if (!(dt > 0.0)) throw ParseError("time column must increase", 3);
        for (std::size_t k = 1; k < times.size(); ++k) {
            const double step = times[k] - times[k - 1];
            if (std::abs(step - dt) > 1e-9 * dt)
                throw ParseError("nonuniform time step", k + 2);
        }
    }

    Matrix states(n_x, samples);
    std::optional<Matrix> inputs;
    if (n_u > 0) inputs = Matrix(n_u, samples);
    for (Eigen::Index k = 0; k < samples; ++k) {
        const auto& row = rows[static_cast<std::size_t>(k)];
        for (int i = 0; i < n_x; ++i) states(i, k) = row[1 + static_cast<std::size_t>(i)];
        for (int j = 0; j < n_u; ++j)
            (*inputs)(j, k) = row[1 + static_cast<std::size_t>(n_x + j)];
    }
    return Trajectory(std::move(states), std::move(inputs), dt, id, times.front());
}

void write_csv(const Trajectory& traj, std::ostream& out) {
    out << 't';
    for (Eigen::Index i = 0; i < traj.state_dim(); ++i) out << ",x" << i + 1;
    for (Eigen::Index j = 0; j < traj.input_dim(); ++j) out << ",u" << j + 1;
    out << '\n';

    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (Eigen::Index k = 0; k < traj.samples(); ++k) {
        put(traj.t0() + static_cast<double>(k) * traj.dt());
        for (Eigen::Index i = 0; i < traj.state_dim(); ++i) {
            out << ',';
            put(traj.states()(i, k));
        }
        for (Eigen::Index j = 0; j < traj.input_dim(); ++j) {
            out << ',';
            put((*traj.inputs())(j, k));
        }
        out << '\n';
    }
}

Trajectory load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return read_csv(in, path.stem().string());
}

void save_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_csv(traj, out);
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace kic
