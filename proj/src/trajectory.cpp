#include "pedirl/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pedirl {

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2)
        throw std::invalid_argument("Trajectory: needs at least 2 samples");
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (!(samples_[i].t > samples_[i - 1].t))
            throw std::invalid_argument("Trajectory: timestamps must be strictly increasing");
    }
    for (const auto& s : samples_) {
        if (!std::isfinite(s.p.x) || !std::isfinite(s.p.y) || !std::isfinite(s.t))
            throw std::invalid_argument("Trajectory: samples must be finite");
    }
}

double Trajectory::heading(std::size_t k) const {
    const Point2 d = samples_[k + 1].p - samples_[k].p;
    return wrap_angle(std::atan2(d.y, d.x));
}

double Trajectory::speed(std::size_t k) const {
    const double dt = samples_[k + 1].t - samples_[k].t;
    return distance(samples_[k + 1].p, samples_[k].p) / dt;
}

double Trajectory::median_speed() const {
    std::vector<double> speeds(step_count());
    for (std::size_t k = 0; k < speeds.size(); ++k) speeds[k] = speed(k);
    std::sort(speeds.begin(), speeds.end());
    const std::size_t n = speeds.size();
    return n % 2 == 1 ? speeds[n / 2] : 0.5 * (speeds[n / 2 - 1] + speeds[n / 2]);
}

Trajectory Trajectory::truncated(double duration) const {
    const double cut = samples_.front().t + duration + 1e-9;
    std::vector<TrajectorySample> kept;
    for (const auto& s : samples_) {
        if (s.t <= cut) kept.push_back(s);
    }
    if (kept.size() < 2)
        throw std::invalid_argument("Trajectory::truncated: fewer than 2 samples remain");
    return Trajectory(std::move(kept));
}

std::vector<Point2> Trajectory::points() const {
    std::vector<Point2> pts(samples_.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = samples_[i].p;
    return pts;
}

Trajectory read_trajectory(std::istream& in, const std::string& source_name) {
    auto fail = [&](int line, const std::string& msg) {
        std::ostringstream os;
        os << source_name << ":" << line << ": " << msg;
        throw std::runtime_error(os.str());
    };

    std::string line;
    if (!std::getline(in, line)) fail(1, "missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,x,y") fail(1, "expected header 't,x,y'");

    std::vector<TrajectorySample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        TrajectorySample s;
        char c1 = 0, c2 = 0;
        if (!(ls >> s.t >> c1 >> s.p.x >> c2 >> s.p.y) || c1 != ',' || c2 != ',')
            fail(line_no, "expected 't,x,y' sample, got '" + line + "'");
        samples.push_back(s);
    }
    if (samples.size() < 2) fail(line_no, "trajectory needs at least 2 samples");
    try {
        return Trajectory(std::move(samples));
    } catch (const std::invalid_argument& e) {
        fail(line_no, e.what());
    }
    throw std::logic_error("unreachable");
}

Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open trajectory file");
    return read_trajectory(in, path);
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
    out << "t,x,y\n";
    out << std::setprecision(17);
    for (const auto& s : traj.samples()) out << s.t << "," << s.p.x << "," << s.p.y << "\n";
}

void save_trajectory(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    write_trajectory(out, traj);
}

}  // namespace pedirl
