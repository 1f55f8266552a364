#include "ttosim/driver/records.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>

namespace ttosim::driver {

std::vector<std::string> record_columns(int sites, bool with_eof) {
    std::vector<std::string> c{"t"};
    for (int j = 1; j <= sites; ++j) c.push_back("Z_" + std::to_string(j));
    for (int j = 1; j < sites; ++j) c.push_back("J_" + std::to_string(j));
    for (const char* n : {"S_L", "S_R", "S", "I_LR", "N_L", "trace", "max_chi", "K", "cum_trunc"}) c.emplace_back(n);
    if (with_eof) c.emplace_back("EoF");
    return c;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    // Shortest text that reads back to the same double.
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string format_row(const observables::MeasurementRecord& r, bool with_eof) {
    std::string s = format_double(r.time);
    auto add = [&](double v) {
        s += ',';
        s += format_double(v);
    };
    for (double z : r.z_profile) add(z);
    for (double j : r.current_profile) add(j);
    add(r.entropy_left);
    add(r.entropy_right);
    add(r.entropy_total);
    add(r.mutual_information);
    add(r.log_negativity);
    add(r.trace);
    s += ',' + std::to_string(r.max_chi);
    s += ',' + std::to_string(r.kraus);
    add(r.cumulative_truncation);
    if (with_eof) add(r.eof.value_or(std::numeric_limits<double>::quiet_NaN()));
    return s;
}

void RecordWriter::open(const std::string& path, int sites, bool with_eof, bool append) {
    const std::string header = boost::algorithm::join(record_columns(sites, with_eof), ",");
    with_eof_ = with_eof;
    path_ = path;
    if (append) {
        std::ifstream in(path);
        std::string first;
        if (in && std::getline(in, first)) {
            if (first != header)
                throw std::runtime_error("records file '" + path + "' has a different header; choose a new output name");
            out_.open(path, std::ios::app);
            if (!out_) throw std::runtime_error("cannot append to records file '" + path + "'");
            return;
        }
    }
    out_.open(path, std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot create records file '" + path + "'");
    out_ << header << '\n' << std::flush;
}

void RecordWriter::write(const observables::MeasurementRecord& r) {
    if (r.current_profile.size() + 1 != r.z_profile.size())
        throw std::logic_error("RecordWriter: profile sizes do not match");
    out_ << format_row(r, with_eof_) << '\n' << std::flush;
    if (!out_) throw std::runtime_error("write to records file '" + path_ + "' failed");
}

int RecordTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> RecordTable::values(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw std::out_of_range("records: no column '" + name + "'");
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r[static_cast<std::size_t>(c)]);
    return v;
}

observables::MeasurementRecord RecordTable::record(std::size_t row) const {
    const auto& r = rows.at(row);
    observables::MeasurementRecord m;
    auto get = [&](const std::string& n) { return r[static_cast<std::size_t>(column(n))]; };
    m.time = get("t");
    for (int j = 1; column("Z_" + std::to_string(j)) >= 0; ++j) m.z_profile.push_back(get("Z_" + std::to_string(j)));
    for (int j = 1; column("J_" + std::to_string(j)) >= 0; ++j)
        m.current_profile.push_back(get("J_" + std::to_string(j)));
    m.entropy_left = get("S_L");
    m.entropy_right = get("S_R");
    m.entropy_total = get("S");
    m.mutual_information = get("I_LR");
    m.log_negativity = get("N_L");
    m.trace = get("trace");
    m.max_chi = static_cast<Index>(get("max_chi"));
    m.kraus = static_cast<Index>(get("K"));
    m.cumulative_truncation = get("cum_trunc");
    if (column("EoF") >= 0) m.eof = get("EoF");
    return m;
}

RecordTable read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open records file '" + path + "'");
    RecordTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("records file '" + path + "' is empty");
    boost::algorithm::split(t.columns, line, boost::algorithm::is_any_of(","));
    for (int n = 2; std::getline(in, line); ++n) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        boost::algorithm::split(cells, line, boost::algorithm::is_any_of(","));
        if (cells.size() != t.columns.size())
            throw std::runtime_error(path + ":" + std::to_string(n) + ": expected " + std::to_string(t.columns.size()) +
                                     " cells, found " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            if (c == "nan") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            std::size_t used = 0;
            double v = std::stod(c, &used);
            if (used != c.size()) throw std::runtime_error(path + ":" + std::to_string(n) + ": bad number '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void truncate_records(const std::string& path, double t, double tol) {
    std::ifstream in(path);
    if (!in) return;
    std::vector<std::string> keep;
    std::string line;
    if (std::getline(in, line)) keep.push_back(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const double time = std::stod(line.substr(0, line.find(',')));
        if (time <= t + tol) keep.push_back(line);
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot rewrite records file '" + path + "'");
    for (const auto& l : keep) out << l << '\n';
}

} // namespace ttosim::driver
