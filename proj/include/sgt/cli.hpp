#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgt {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitVerify = 3,
};

/// Entry point of the `sgt` tool. argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Schema guessed from a CSV header and body: a column is numeric when every
/// cell parses as a number, categorical (sorted levels) otherwise. The last
/// column is the target and is not part of the schema.
std::string infer_schema_text(const std::string& csv_text);

}  // namespace sgt
