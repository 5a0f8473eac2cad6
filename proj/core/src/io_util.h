#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace svo::detail {

std::string Trim(const std::string& s);
std::vector<std::string> SplitFields(const std::string& line, char sep);
// Whole-string strtod; false on trailing junk, overflow or empty input.
bool ParseDouble(const std::string& text, double& out);
// %.17g, so every double survives a write/read cycle.
std::string FormatDouble(double v);

std::ifstream OpenInput(const std::filesystem::path& path);
std::ofstream OpenOutput(const std::filesystem::path& path);
void CloseOutput(std::ofstream& out, const std::filesystem::path& path);

}  // namespace svo::detail
