#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hetlb/cli.hpp"

namespace hetlb::cli {

// Files are staged in memory and written together; on failure nothing that
// this run created is left behind.
class OutputSet {
public:
    explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content);
    // Writes every file; returns their hashes keyed by name.
    std::map<std::string, std::string> commit() const;
    const std::map<std::string, std::string>& files() const { return files_; }
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::map<std::string, std::string> files_;
};

// 64-bit FNV-1a, hex.
std::string content_hash(const std::string& content);

const std::vector<std::string>& recipe_names();

// Fills `out` with the recipe's CSVs and SVGs; progress and a short summary go
// to `log`. Throws ConfigError for unknown recipes.
void run_experiment(const std::string& recipe, const RunConfig& config, OutputSet& out,
                    std::ostream& log);

}  // namespace hetlb::cli
