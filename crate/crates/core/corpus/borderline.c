#include <sys/stat.h>
#include <unistd.h>
#include <stdio.h>

int current_uid;

int get_file_uid(char *filename)
{
    struct stat st;
    stat(filename, &st);
    int file_uid = st.st_uid;
    return file_uid;
}

int do_ls(char *cmd)
{
    char *fname = cmd + 3;
    int uid = get_file_uid(fname);
    printf("%s %d\n", fname, uid);
    return 0;
}

int do_chown(char *cmd)
{
    char *fname = cmd + 6;
    char *pathname = fname;
    int new_uid = 0;
    int new_gid = 0;
    int uid = get_file_uid(fname);
    if (uid == current_uid) {
        chown(pathname, new_uid, new_gid);
        return 0;
    }
    return -1;
}
