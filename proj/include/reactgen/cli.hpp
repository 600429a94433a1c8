// Copyright 2026 The reactgen Authors
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

#ifndef REACTGEN_CLI_HPP_
#define REACTGEN_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace reactgen::cli
{

inline constexpr const char * kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2 };

/// Runs one command line (without the program name). Normal output goes to `out`,
/// diagnostics and errors to `err`.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

/// Reads a flat key=value file ('#' starts a comment) into `--key=value` tokens.
/// Throws std::runtime_error when the file is unreadable or a line has no '='.
std::vector<std::string> config_tokens(const std::string & path);

}  // namespace reactgen::cli

#endif  // REACTGEN_CLI_HPP_
