// Reads a history dump and checks it for strict serializability.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "medley/verify/checker.hpp"
#include "medley/verify/history.hpp"
#include "medley/verify/linearizability.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Strict-serializability check of a recorded history"};
  std::string path;
  bool linearizable = false;
  app.add_option("history", path, "history file, '-' for stdin")->required();
  app.add_flag("--linearizable", linearizable, "also run the per-key linearizability search");
  CLI11_PARSE(app, argc, argv);

  medley::verify::History h;
  try {
    if (path == "-") {
      h = medley::verify::readHistory(std::cin);
    } else {
      std::ifstream in(path);
      if (!in) {
        std::fprintf(stderr, "error: cannot open %s\n", path.c_str());
        return 2;
      }
      h = medley::verify::readHistory(in);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  const auto v = medley::verify::checkStrictSerializability(h);
  if (!v.ok) {
    std::fprintf(stderr, "FAIL: %s\n", v.message.c_str());
    return 1;
  }
  std::fprintf(stderr, "OK: %zu events, %zu committed transactions, %zu committed events\n", h.size(),
               v.transactions, v.events);
  if (linearizable) {
    const auto l = medley::verify::checkLinearizable(h);
    if (!l.ok) {
      std::fprintf(stderr, "FAIL (linearizability): %s\n", l.message.c_str());
      return 1;
    }
    std::fprintf(stderr, "OK (linearizability)\n");
  }
  return 0;
}
