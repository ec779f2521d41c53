#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/common.hpp"
#include "serocontact/csv.hpp"

namespace sero {

struct SerologySample {
    std::string id;
    double age = 0.0;
    int status = 0; // 0 susceptible, 1 immune
    /// False when the recorded age is a whole number of years, i.e. only the
    /// completed age is known and the true age lies somewhere in [age, age+1).
    bool age_known_exactly = false;
};

class SerologyDataset {
public:
    SerologyDataset() = default;
    explicit SerologyDataset(std::vector<SerologySample> samples)
        : samples_(std::move(samples)) {}

    static SerologyDataset load(const std::string& path, double maternal_antibody_age = 0.5,
                                double life_expectancy = 80.0) {
        csv::Table t = csv::read_table(path, {"id", "age", "status"});
        SerologyDataset ds;
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            SerologySample s;
            s.id = t.rows[i][0];
            s.age = csv::parse_double(t, i, 1);
            long status = csv::parse_long(t, i, 2);
            if (status != 0 && status != 1)
                throw ParseError(path, t.lines[i],
                                 "status must be 0 or 1, got '" + t.rows[i][2] + "'");
            s.status = static_cast<int>(status);
            if (s.age <= maternal_antibody_age) {
                ++ds.excluded_below_maternal_;
                continue;
            }
            if (s.age >= life_expectancy) {
                ++ds.excluded_above_life_expectancy_;
                continue;
            }
            s.age_known_exactly = s.age != std::floor(s.age);
            ds.samples_.push_back(std::move(s));
        }
        if (ds.samples_.empty())
            throw ParseError(path, "no usable serology records");
        return ds;
    }

    void write(const std::string& path) const {
        csv::Writer w(path, {"id", "age", "status"});
        for (const auto& s : samples_)
            w.row({s.id, csv::format_double(s.age), std::to_string(s.status)});
    }

    const std::vector<SerologySample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    const SerologySample& operator[](std::size_t i) const { return samples_[i]; }

    std::size_t excluded_below_maternal() const { return excluded_below_maternal_; }
    std::size_t excluded_above_life_expectancy() const { return excluded_above_life_expectancy_; }

    std::size_t count_immune() const {
        std::size_t c = 0;
        for (const auto& s : samples_) c += static_cast<std::size_t>(s.status);
        return c;
    }

    void push_back(SerologySample s) { samples_.push_back(std::move(s)); }

private:
    std::vector<SerologySample> samples_;
    std::size_t excluded_below_maternal_ = 0;
    std::size_t excluded_above_life_expectancy_ = 0;
};

} // namespace sero
