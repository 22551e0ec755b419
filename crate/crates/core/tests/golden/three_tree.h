/* Quantized random forest. Generated file, do not edit. */
#ifndef THREE_TREE_FOREST_H
#define THREE_TREE_FOREST_H

#include <stdint.h>

#define THREE_TREE_N_TREES 3
#define THREE_TREE_N_CLASSES 2
#define THREE_TREE_N_FEATURES 2
#define THREE_TREE_N_NODES 9
#define THREE_TREE_N_LEAVES 6
#define THREE_TREE_MAX_DEPTH 2
#define THREE_TREE_LEAF_ONE 16384

/* fidx == -1 marks a leaf; its right field indexes LEAVES. */
/* The left child of node i is node i + 1. */
typedef struct {
    int16_t fidx;
    int16_t th;
    uint16_t right;
} three_tree_node_t;

static const three_tree_node_t three_tree_FOREST[THREE_TREE_N_NODES] = {
    { 0, -8192, 2 }, /* 0 */
    { -1, 0, 0 }, /* 1 */
    { 1, 0, 4 }, /* 2 */
    { -1, 0, 1 }, /* 3 */
    { -1, 0, 2 }, /* 4 */
    { 1, -16384, 7 }, /* 5 */
    { -1, 0, 3 }, /* 6 */
    { -1, 0, 4 }, /* 7 */
    { -1, 0, 5 }, /* 8 */
};

static const uint16_t three_tree_ROOT[THREE_TREE_N_TREES] = {
    0, 5, 8,
};

static const int16_t three_tree_LEAVES[THREE_TREE_N_LEAVES][THREE_TREE_N_CLASSES] = {
    { 14746, 1638 }, /* 0 */
    { 6554, 9830 }, /* 1 */
    { 0, 16384 }, /* 2 */
    { 12288, 4096 }, /* 3 */
    { 3277, 13107 }, /* 4 */
    { 8192, 8192 }, /* 5 */
};

#endif /* THREE_TREE_FOREST_H */
