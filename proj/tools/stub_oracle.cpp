// Table-backed oracle speaking the invariant line protocol on stdin/stdout.

#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "rigid/oracle.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rigid-stub-oracle: answers PLANE/SPHERE/MBEZOUT requests from a table"};
  std::string table_path;
  std::string transcript_path;
  app.add_option("--table", table_path, "table of 'n code invariant value' records")->required();
  app.add_option("--transcript", transcript_path, "append every request and reply here");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto table = rigid::OracleTable::load(table_path);
    std::unique_ptr<std::ofstream> transcript;
    if (!transcript_path.empty()) {
      transcript = std::make_unique<std::ofstream>(transcript_path, std::ios::app);
      if (!*transcript) {
        std::cerr << "rigid-stub-oracle: cannot open transcript " << transcript_path << '\n';
        return 2;
      }
    }
    std::ios::sync_with_stdio(false);
    rigid::serve_oracle(table, std::cin, std::cout, transcript.get());
  } catch (const std::exception& e) {
    std::cerr << "rigid-stub-oracle: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
