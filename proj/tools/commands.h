// Copyright 2026 The genmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GENMATCH_TOOLS_COMMANDS_H_
#define GENMATCH_TOOLS_COMMANDS_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace genmatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitBadInput = 3;

// A parsed CSV file: header plus rows of equal width.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index for `name`; throws genmatch::InvalidInput if absent.
  std::size_t Column(const std::string& name) const;
};

// Comma separated, first row header, double quotes for fields holding
// commas or quotes. Throws genmatch::InvalidInput on ragged rows.
CsvTable ParseCsv(std::istream& in);
CsvTable ReadCsv(const std::string& path);

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace genmatch::cli

#endif  // GENMATCH_TOOLS_COMMANDS_H_
