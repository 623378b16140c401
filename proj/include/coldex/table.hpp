#pragma once

#include <string>
#include <vector>

#include "coldex/binary_md.hpp"
#include "coldex/collision_mc.hpp"
#include "coldex/rate_inference.hpp"

namespace coldex::io {

/// Curve table: emm_mk,mean_pb,stderr,n_trials[,mean_collisions].
void write_curve(const std::string& path, const mc::Curve& curve);
mc::Curve read_curve(const std::string& path);

/// Measurement table: crystal,f,m,n_trials,n_bright.
std::vector<infer::MeasurementRecord> read_measurements(const std::string& path);
void write_measurements(const std::string& path, const std::vector<infer::MeasurementRecord>& records);

/// Contact statistics: '#'-prefixed metadata, then n,probability,error.
void write_pmf(const std::string& path, const md::ContactStatistics& stats);
md::ContactStatistics read_pmf(const std::string& path);

/// Angle histogram: phi,pdf,error plus fitted coefficients as metadata.
void write_angles(const std::string& path, const md::AngleDistribution& dist);

} // namespace coldex::io
