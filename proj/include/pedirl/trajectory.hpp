#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pedirl/geometry.hpp"

namespace pedirl {

struct TrajectorySample {
    double t = 0.0;  // seconds
    Point2 p{};
};

/// Time-stamped 2-D path with strictly increasing timestamps and at least two
/// samples. Headings and speeds are derived per step: phi_k points from
/// sample k to sample k+1.
class Trajectory {
public:
    explicit Trajectory(std::vector<TrajectorySample> samples);

    const std::vector<TrajectorySample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    const TrajectorySample& operator[](std::size_t i) const { return samples_[i]; }
    const TrajectorySample& front() const { return samples_.front(); }
    const TrajectorySample& back() const { return samples_.back(); }

    double duration() const { return samples_.back().t - samples_.front().t; }

    /// Number of derived steps (= size() - 1).
    std::size_t step_count() const { return samples_.size() - 1; }

    /// Heading of step k (from sample k to k+1), in (-pi, pi].
    double heading(std::size_t k) const;

    /// Speed magnitude of step k in m/s.
    double speed(std::size_t k) const;

    /// Median per-step speed.
    double median_speed() const;

    /// Samples with t <= front().t + duration (relative cut). Keeps at least
    /// the first sample.
    Trajectory truncated(double duration) const;

    /// All sample points as a bare point set.
    std::vector<Point2> points() const;

private:
    std::vector<TrajectorySample> samples_;
};

/// Trajectory file: delimited text, one `t,x,y` sample per line, header line
/// required.
Trajectory read_trajectory(std::istream& in, const std::string& source_name = "<stream>");
Trajectory load_trajectory(const std::string& path);
void write_trajectory(std::ostream& out, const Trajectory& traj);
void save_trajectory(const std::string& path, const Trajectory& traj);

}  // namespace pedirl
