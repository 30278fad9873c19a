// Copyright 2026 The nelsonlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NELSON_IO_HPP
#define NELSON_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace nelson {

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double value);

/// Quote a CSV field when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& value);

/// Writes one RFC 4180 record terminated by "\n".
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace nelson

#endif  // NELSON_IO_HPP
