#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Shared scratch area; the end-to-end criteria hand artifacts to each other here.
std::filesystem::path work_dir();

void log(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));

nlohmann::json read_json(const std::filesystem::path& p);
void write_json(const nlohmann::json& j, const std::filesystem::path& p);

Outcome gradients();        // 1
Outcome operators();        // 2
Outcome thermodynamics();   // 3
Outcome neighbor_search();  // 4
Outcome translation();      // 5
Outcome solid_end_to_end(); // 6
Outcome transfer();         // 7
Outcome fluid_end_to_end(); // 8
Outcome metrics_suite();    // 9
Outcome determinism();      // 10

}  // namespace acceptance
