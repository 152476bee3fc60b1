#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "beamosd/runtime.hpp"

int main(int argc, char** argv) {
  beamosd::init_threads(false);
  return doctest::Context(argc, argv).run();
}
