#pragma once

#include <string>
#include <vector>

namespace ivrl {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// UTF-8 CSV with a header row, '\n' newlines, '.' decimals. Deterministic:
// identical rows produce identical bytes.
void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows);

}  // namespace ivrl
