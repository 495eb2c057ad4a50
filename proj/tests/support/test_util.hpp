#pragma once

#include <gtest/gtest.h>

#include "streamstat/error.hpp"

#define EXPECT_STREAMSTAT_ERROR(stmt, expected_code)                                  \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << "expected " << streamstat::to_string(expected_code);           \
    } catch (const streamstat::Error& e) {                                            \
      EXPECT_EQ(e.code(), expected_code) << e.what();                                 \
    }                                                                                 \
  } while (0)
