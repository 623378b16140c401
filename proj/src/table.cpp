#include "coldex/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coldex/errors.hpp"

namespace coldex::io {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open input file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open output file: " + path);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ','))
        fields.push_back(field);
    return fields;
}

double to_double(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("bad numeric field '" + s + "' in " + path);
    }
}

long to_long(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("bad integer field '" + s + "' in " + path);
    }
}

void expect_header(const std::string& got, const std::string& want, const std::string& path) {
    if (got != want)
        throw DataError("unexpected header in " + path + ": got '" + got + "', want '" + want + "'");
}

} // namespace

void write_curve(const std::string& path, const mc::Curve& curve) {
    auto out = open_output(path);
    out << "emm_mk,mean_pb,stderr,n_trials,mean_collisions\n";
    for (const auto& p : curve)
        out << num(p.emm_mk) << ',' << num(p.mean_pb) << ',' << num(p.stderr_pb) << ','
            << p.n_trials << ',' << num(p.mean_collisions) << '\n';
}

mc::Curve read_curve(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw DataError("empty curve file: " + path);
    expect_header(line, "emm_mk,mean_pb,stderr,n_trials,mean_collisions", path);
    mc::Curve curve;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto f = split_csv(line);
        if (f.size() != 5)
            throw DataError("malformed curve row in " + path);
        curve.push_back({to_double(f[0], path), to_double(f[1], path), to_double(f[2], path),
                         to_long(f[3], path), to_double(f[4], path)});
    }
    if (curve.empty())
        throw DataError("curve file has no rows: " + path);
    return curve;
}

std::vector<infer::MeasurementRecord> read_measurements(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw DataError("empty measurement file: " + path);
    expect_header(line, "crystal,f,m,n_trials,n_bright", path);
    std::vector<infer::MeasurementRecord> records;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto f = split_csv(line);
        if (f.size() != 5)
            throw DataError("malformed measurement row in " + path);
        infer::MeasurementRecord r{f[0], int(to_long(f[1], path)), int(to_long(f[2], path)),
                                   to_long(f[3], path), to_long(f[4], path)};
        r.validate();
        records.push_back(std::move(r));
    }
    if (records.empty())
        throw DataError("measurement file has no rows: " + path);
    return records;
}

void write_measurements(const std::string& path, const std::vector<infer::MeasurementRecord>& records) {
    auto out = open_output(path);
    out << "crystal,f,m,n_trials,n_bright\n";
    for (const auto& r : records)
        out << r.crystal << ',' << r.f << ',' << r.m << ',' << r.n_trials << ',' << r.n_bright << '\n';
}

void write_pmf(const std::string& path, const md::ContactStatistics& stats) {
    auto out = open_output(path);
    out << "# n_collisions = " << stats.n_collisions << '\n';
    out << "# n_sampled = " << stats.n_sampled << '\n';
    out << "# n_truncated = " << stats.n_truncated << '\n';
    out << "# n_failed = " << stats.n_failed << '\n';
    out << "# contact_radius_m = " << num(stats.contact_radius) << '\n';
    out << "n,probability,error\n";
    for (std::size_t i = 0; i < stats.pmf.size(); ++i)
        out << (i + 1) << ',' << num(stats.pmf[i]) << ',' << num(stats.error[i]) << '\n';
}

md::ContactStatistics read_pmf(const std::string& path) {
    auto in = open_input(path);
    md::ContactStatistics stats;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream is(line.substr(1));
            std::string key, eq;
            double value;
            if (is >> key >> eq >> value && eq == "=") {
                if (key == "n_collisions")
                    stats.n_collisions = long(value);
                else if (key == "n_sampled")
                    stats.n_sampled = long(value);
                else if (key == "n_truncated")
                    stats.n_truncated = long(value);
                else if (key == "n_failed")
                    stats.n_failed = long(value);
                else if (key == "contact_radius_m")
                    stats.contact_radius = value;
            }
            continue;
        }
        if (!header_seen) {
            expect_header(line, "n,probability,error", path);
            header_seen = true;
            continue;
        }
        auto f = split_csv(line);
        if (f.size() != 3)
            throw DataError("malformed contact-statistics row in " + path);
        long n = to_long(f[0], path);
        if (n != long(stats.pmf.size()) + 1)
            throw DataError("contact-statistics rows must be contiguous from n = 1 in " + path);
        stats.pmf.push_back(to_double(f[1], path));
        stats.error.push_back(to_double(f[2], path));
    }
    if (stats.pmf.empty())
        throw DataError("contact-statistics file has no rows: " + path);
    double mean = 0.0;
    for (std::size_t i = 0; i < stats.pmf.size(); ++i)
        mean += double(i + 1) * stats.pmf[i];
    stats.mean_n = mean;
    stats.check_normalized(1e-9);
    return stats;
}

void write_angles(const std::string& path, const md::AngleDistribution& dist) {
    auto out = open_output(path);
    out << "# n_spiraling = " << dist.n_spiraling << '\n';
    out << "# n_sampled = " << dist.n_sampled << '\n';
    out << "# fit_c0 = " << num(dist.fit[0]) << '\n';
    out << "# fit_c1 = " << num(dist.fit[1]) << '\n';
    out << "# fit_c2 = " << num(dist.fit[2]) << '\n';
    out << "# widened = " << (dist.widened ? 1 : 0) << '\n';
    out << "phi,pdf,error\n";
    for (std::size_t i = 0; i < dist.pdf.size(); ++i)
        out << num(dist.bin_center[i]) << ',' << num(dist.pdf[i]) << ',' << num(dist.error[i])
            << '\n';
}

} // namespace coldex::io
