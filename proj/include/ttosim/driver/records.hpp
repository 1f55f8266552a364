// records.hpp: the per-run CSV of measurement records
//
// Columns: t, Z_1..Z_l, J_1..J_{l-1}, S_L, S_R, S, I_LR, N_L, trace, max_chi,
// K, cum_trunc, and EoF when that observable is enabled. Reals use 17
// significant digits; unmeasured values are written as "nan".

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "ttosim/observables/measure.hpp"

namespace ttosim::driver {

std::vector<std::string> record_columns(int sites, bool with_eof);
std::string format_double(double v);
std::string format_row(const observables::MeasurementRecord& r, bool with_eof);

/// Append-only writer; each row is flushed as soon as it is written.
class RecordWriter {
public:
    RecordWriter() = default;
    /// Creates the file with its header, or appends when `append` is set
    /// and the existing header matches.
    void open(const std::string& path, int sites, bool with_eof, bool append);
    void write(const observables::MeasurementRecord& r);
    bool is_open() const { return out_.is_open(); }
    const std::string& path() const { return path_; }

private:
    std::ofstream out_;
    std::string path_;
    bool with_eof_{false};
};

struct RecordTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const; // -1 when absent
    std::vector<double> values(const std::string& name) const;
    observables::MeasurementRecord record(std::size_t row) const;
};

RecordTable read_records(const std::string& path);

/// Drop every row past time t (used before resuming into the same file).
void truncate_records(const std::string& path, double t, double tol);

} // namespace ttosim::driver
