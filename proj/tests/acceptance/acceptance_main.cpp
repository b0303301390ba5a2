#include <CLI11.hpp>

#include <iostream>

#include "ssmp/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance battery, one line per criterion"};
  ssmp::BatteryOptions opts;
  std::vector<int> only;
  app.add_option("--seed", opts.seed, "master seed");
  app.add_option("--jobs", opts.jobs, "worker threads (0 = all cores)");
  app.add_option("--only", only, "criteria to run")->check(CLI::Range(1, ssmp::kCriteria));
  app.add_option("--data", opts.data_dir, "directory for data files");
  CLI11_PARSE(app, argc, argv);

  const auto results = ssmp::run_battery(opts, only, [](const ssmp::CriterionResult& r) {
    std::cout << ssmp::summary_line(r) << std::endl;
    for (const auto& t : r.reports)
      std::cout << "      " << (t.pass ? "ok   " : "FAIL ") << t.name << ": " << t.statistic << " = "
                << ssmp::format_double(t.value) << " (" << t.relation << " " << ssmp::format_double(t.threshold)
                << ")" << (t.note.empty() ? "" : "  " + t.note) << "\n";
    for (const auto& t : r.info)
      std::cout << "      info " << t.name << ": " << t.statistic << " = " << ssmp::format_double(t.value) << "\n";
  });
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << results.size() - failed << "/" << results.size() << std::endl;
  return failed ? 1 : 0;
}
